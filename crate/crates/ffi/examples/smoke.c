/* Minimal C client: solves a two-variable model and prints the estimate. */
#include <stdio.h>
#include "splitmin.h"

static const char *MODEL =
    "FGM 1\n"
    "vars 2\n"
    "card 2 2\n"
    "phi 0 0 1\n"
    "phi 1 0 1\n"
    "factor 2 0 1 0 0 0 1\n";

int main(void) {
    SmGraph *g = NULL;
    SmParams *c = NULL;
    SmReport *r = NULL;
    size_t x[2];
    double value = 0.0;

    if (sm_graph_parse(MODEL, &g) != SM_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", sm_last_error());
        return 1;
    }
    if (sm_params_uniform(g, &c) != SM_STATUS_OK) {
        fprintf(stderr, "params: %s\n", sm_last_error());
        return 1;
    }
    SmSolveOptions opts = sm_solve_options_default();
    opts.schedule = 1;
    if (sm_solve(g, c, &opts, &r) != SM_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", sm_last_error());
        return 1;
    }
    if (sm_report_estimate(r, x, 2, &value) != SM_STATUS_OK) {
        fprintf(stderr, "estimate: %s\n", sm_last_error());
        return 1;
    }
    printf("status %d estimate %zu %zu objective %g\n", (int)sm_report_status(r), x[0], x[1], value);
    sm_report_free(r);
    sm_params_free(c);
    sm_graph_free(g);
    return 0;
}
