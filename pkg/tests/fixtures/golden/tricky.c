#include "pdt_hooks.h" /* pdttag */
#include <stdio.h>

/* A commented-out directive must be ignored:
#pragma omp parallel
*/

static const char *note = "#pragma omp parallel inside a string";

// #pragma omp single also ignored here

int busy(int n) {
    int total = 0;
pdt_region_begin(0); /* pdttag */
#pragma omp parallel \
    for num_threads(pdt_region_threads(0)) /* pdttag */
    for (int i = 0; i < n; i++)
        total += i; /* reduction omitted: text fixture only */
pdt_region_end(0); /* pdttag */
    do {
        total--;
    } while (total > 1000);
    printf("%s\n", note);
pdt_region_begin(1); /* pdttag */
#pragma omp parallel num_threads(pdt_region_threads(1)) /* pdttag */
    do {
        total += 2;
    } while (total < 0);
pdt_region_end(1); /* pdttag */
    return total;
}
