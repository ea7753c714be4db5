#include <stdio.h>

/* A commented-out directive must be ignored:
#pragma omp parallel
*/

static const char *note = "#pragma omp parallel inside a string";

// #pragma omp single also ignored here

int busy(int n) {
    int total = 0;
#pragma omp parallel \
    for
    for (int i = 0; i < n; i++)
        total += i; /* reduction omitted: text fixture only */
    do {
        total--;
    } while (total > 1000);
    printf("%s\n", note);
#pragma omp parallel
    do {
        total += 2;
    } while (total < 0);
    return total;
}
