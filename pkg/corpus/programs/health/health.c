/* Country health-system simulation: villages generate and treat patients
 * each step; per-village state keeps the parallel loops race-free. */
#include <stdio.h>

#define VILLAGES 256
#define STEPS 400

static unsigned rng_state[VILLAGES];
static long waiting[VILLAGES];
static long treated[VILLAGES];

static unsigned next_rand(unsigned *state)
{
    *state = *state * 1664525u + 1013904223u;
    return *state >> 16;
}

int main(void)
{
    for (int v = 0; v < VILLAGES; v++) {
        rng_state[v] = 12345u + 977u * (unsigned)v;
        waiting[v] = 0;
        treated[v] = 0;
    }

    for (int step = 0; step < STEPS; step++) {
#pragma omp parallel for
        for (int v = 0; v < VILLAGES; v++) {
            unsigned arrivals = next_rand(&rng_state[v]) % 4;
            waiting[v] += arrivals;
            long capacity = 2 + (v % 3);
            long served = waiting[v] < capacity ? waiting[v] : capacity;
            waiting[v] -= served;
            treated[v] += served;
        }
    }

    long total_treated = 0;
    long total_waiting = 0;
#pragma omp parallel for
    for (int v = 0; v < VILLAGES; v++) {
#pragma omp atomic
        total_treated += treated[v];
#pragma omp atomic
        total_waiting += waiting[v];
    }

    printf("CHECK %ld\n", total_treated * 1000 + total_waiting);
    return 0;
}
