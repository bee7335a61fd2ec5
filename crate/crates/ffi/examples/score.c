/* Scores a small 2-D point set with DTM of order 2 and prints the results.
 *
 *   cargo build --release -p dtmad-ffi
 *   cc crates/ffi/examples/score.c -Icrates/ffi/include \
 *      target/release/libdtmad_ffi.a -lpthread -ldl -lm -o score
 */
#include <stdio.h>

#include "dtmad.h"

int main(void) {
    const double points[] = {0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 0.1, 0.1, 0.05, 0.05, 3.0, 3.0};
    const size_t n = 6, d = 2;
    DtmadDataset *data = NULL;
    DtmadIndex *index = NULL;
    double scores[6];
    size_t k = 0;

    if (dtmad_dataset_new(points, n, d, &data) != DTMAD_STATUS_OK ||
        dtmad_index_new(data, &index) != DTMAD_STATUS_OK ||
        dtmad_score(index, DTMAD_METHOD_DTM, 3, 2.0, scores, &k) != DTMAD_STATUS_OK) {
        fprintf(stderr, "dtmad: %s\n", dtmad_last_error_message());
        dtmad_index_free(index);
        dtmad_dataset_free(data);
        return 1;
    }
    printf("dtmad %s, k = %zu\n", dtmad_version(), k);
    for (size_t i = 0; i < n; i++) {
        printf("%zu %.6f\n", i, scores[i]);
    }
    dtmad_index_free(index);
    dtmad_dataset_free(data);
    return 0;
}
