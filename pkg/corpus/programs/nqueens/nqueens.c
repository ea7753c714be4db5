/* N-queens solution count; one task per first-row column. */
#include <stdio.h>

#define N 11

static long count_from(int *cols, int row)
{
    if (row == N)
        return 1;
    long total = 0;
    for (int c = 0; c < N; c++) {
        int ok = 1;
        for (int r = 0; r < row; r++)
            if (cols[r] == c || cols[r] - r == c - row || cols[r] + r == c + row) {
                ok = 0;
                break;
            }
        if (ok) {
            cols[row] = c;
            total += count_from(cols, row + 1);
        }
    }
    return total;
}

int main(void)
{
    long solutions = 0;

#pragma omp parallel
    {
#pragma omp single
        {
            for (int first = 0; first < N; first++) {
#pragma omp task firstprivate(first)
                {
                    int cols[N];
                    cols[0] = first;
                    long part = count_from(cols, 1);
#pragma omp atomic
                    solutions += part;
                }
            }
        }
    }

    printf("CHECK %ld\n", solutions);
    return 0;
}
