#include <stdio.h>
#include <string.h>

#include "jnlab.h"

int main(void) {
    JnSequence *seq = NULL;
    JnVerdict *verdict = NULL;
    char *text = NULL;
    bool passed = false;

    if (jn_sequence_standard(&seq) != JN_STATUS_OK) return 10;
    if (jn_check_fsjn(seq, 6, 12, "1/10", &verdict) != JN_STATUS_OK) return 11;
    if (jn_verdict_passed(verdict, &passed) != JN_STATUS_OK || !passed) return 12;
    if (jn_verdict_render(verdict, true, &text) != JN_STATUS_OK) return 13;
    if (strncmp(text, "n,norm,max_abs", 14) != 0) return 14;
    jn_string_free(text);
    jn_verdict_free(verdict);

    if (jn_check_fsjn(seq, 6, 12, "tenth", &verdict) != JN_STATUS_PARSE_ERROR) return 15;
    text = jn_last_error();
    if (text == NULL) return 16;
    jn_string_free(text);

    if (jn_sequence_term_json(NULL, 0, &text) != JN_STATUS_NULL_POINTER) return 17;
    jn_sequence_free(seq);
    printf("%s\n", jn_version());
    return 0;
}
