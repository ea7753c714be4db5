/* Optimal cell-to-slot assignment by branch and bound: tasks explore the
 * first assignment level, a shared bound prunes, a critical section keeps
 * the best cost consistent. The optimum is unique so any search order
 * prints the same answer. */
#include <stdio.h>
#include <limits.h>

#define CELLS 10

static int cost[CELLS][CELLS];
static int best_cost = INT_MAX;

static int lower_bound(int level, int used_mask)
{
    int bound = 0;
    for (int cell = level; cell < CELLS; cell++) {
        int cheapest = INT_MAX;
        for (int slot = 0; slot < CELLS; slot++)
            if (!(used_mask & (1 << slot)) && cost[cell][slot] < cheapest)
                cheapest = cost[cell][slot];
        bound += cheapest;
    }
    return bound;
}

static void search(int level, int used_mask, int so_far)
{
    int bound_snapshot;
#pragma omp atomic read
    bound_snapshot = best_cost;
    if (so_far + lower_bound(level, used_mask) >= bound_snapshot)
        return;
    if (level == CELLS) {
#pragma omp critical
        if (so_far < best_cost)
            best_cost = so_far;
        return;
    }
    for (int slot = 0; slot < CELLS; slot++)
        if (!(used_mask & (1 << slot)))
            search(level + 1, used_mask | (1 << slot), so_far + cost[level][slot]);
}

int main(void)
{
    for (int c = 0; c < CELLS; c++)
        for (int s = 0; s < CELLS; s++)
            cost[c][s] = (c * 13 + s * 29) % 37 + ((c + s) % 5) * 3 + 1;

#pragma omp parallel
    {
#pragma omp single
        {
            for (int slot = 0; slot < CELLS; slot++) {
#pragma omp task firstprivate(slot)
                search(1, 1 << slot, cost[0][slot]);
            }
        }
    }

    printf("CHECK %d\n", best_cost);
    return 0;
}
