#include <stdio.h>
#include "chandisc.h"

int main(void) {
    ChandiscEnsemble *e = NULL;
    if (chandisc_ensemble_preset("clock_shift:2", &e) != CHANDISC_STATUS_OK) {
        fprintf(stderr, "%s\n", chandisc_last_error());
        return 1;
    }
    double p = 0.0;
    ChandiscStatus st = chandisc_optimal_single_copy(e, &p);
    printf("members %zu status %d optimum %.6f oracle %.6f\n", chandisc_ensemble_len(e), (int)st, p,
           chandisc_oracle_clock_shift(2, 1));
    chandisc_ensemble_free(e);
    return st == CHANDISC_STATUS_OK ? 0 : 1;
}
