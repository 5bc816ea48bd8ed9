#include <math.h>
#include <stdio.h>
#include "confhor.h"

#define CHECK(c) do { if (!(c)) { fprintf(stderr, "line %d: %s\n", __LINE__, #c); return 1; } } while (0)

int main(void) {
    ConfhorEntry *e = NULL;
    CHECK(confhor_entry_new(CONFHOR_METRIC_SCHWARZSCHILD, 1.0, 0.0, 0.0, 0.0, &e) == CONFHOR_STATUS_OK);
    double w[4] = {0.5, 0.7, 1.0, 0.4};
    ConfhorMass m;
    CHECK(confhor_mass(e, w, &m) == CONFHOR_STATUS_OK);
    CHECK(isfinite(m.m) && m.dm_dw0 < 0.0);
    double lx;
    CHECK(confhor_horizon_log(e, 0.7, 1.0, &lx) == CONFHOR_STATUS_OK && lx < 0.0);
    CHECK(confhor_penrose(e, 0, NULL) == CONFHOR_STATUS_NULL_POINTER);
    ConfhorBound b;
    CHECK(confhor_penrose(e, 8, &b) == CONFHOR_STATUS_HYPOTHESIS_VIOLATED);
    CHECK(confhor_last_error() != NULL);
    confhor_entry_free(e);

    CHECK(confhor_entry_new(CONFHOR_METRIC_SCHWARZSCHILD, -1.0, 0.0, 0.0, 0.0, &e) == CONFHOR_STATUS_INVALID_PARAMETER);
    CHECK(e == NULL);
    printf("ok %s\n", confhor_version());
    return 0;
}
