/* Minimal consumer of the C interface.
 *
 * Build from the workspace root:
 *   cargo build -p corpus-forge-ffi
 *   cc crates/ffi/examples/demo.c \
 *      -Icrates/ffi/include \
 *      target/debug/libcorpus_forge_ffi.a \
 *      -lpthread -ldl -lm -o demo
 */
#include "corpus_forge.h"

#include <inttypes.h>
#include <stdio.h>
#include <stdlib.h>

static void check(CfStatus status, const char *what) {
    if (status != CF_STATUS_OK) {
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)status,
                cf_last_error_message());
        exit(1);
    }
}

int main(void) {
    printf("library version %s\n", cf_version());

    /* Temperature-adjusted sampling probabilities. */
    uint64_t counts[2] = {900, 100};
    double probs[2];
    check(cf_temperature_probabilities(counts, 2, 0.3, probs),
          "cf_temperature_probabilities");
    printf("p = (%.4f, %.4f)\n", probs[0], probs[1]);

    /* Token-bag span F1. */
    double f1 = 0.0;
    check(cf_span_f1("New Delhi", "Delhi", true, &f1), "cf_span_f1");
    printf("span F1 = %.4f\n", f1);

    /* Native-script letter ratio. */
    double ratio = 0.0;
    uint64_t letters = 0;
    check(cf_native_ratio("राम ghar", "hi", &ratio, &letters),
          "cf_native_ratio");
    printf("native ratio = %.2f over %" PRIu64 " letters\n", ratio, letters);

    /* Aligned transliteration into Devanagari. */
    char *deva = NULL;
    uint64_t converted = 0;
    check(cf_to_devanagari("நன்றி", "ta", &deva,
                           &converted),
          "cf_to_devanagari");
    printf("transliterated %" PRIu64 " code points: %s\n", converted, deva);
    cf_string_free(deva);

    return 0;
}
