/* Toy Strassen matrix multiply: 7 recursive block products spawned as
 * tasks, integer arithmetic so the checksum is exact. */
#include <stdio.h>
#include <stdlib.h>

#define N 64
#define CUTOFF 16

static void add_blk(const int *a, int la, const int *b, int lb, int *c, int lc, int n)
{
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++)
            c[i * lc + j] = a[i * la + j] + b[i * lb + j];
}

static void sub_blk(const int *a, int la, const int *b, int lb, int *c, int lc, int n)
{
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++)
            c[i * lc + j] = a[i * la + j] - b[i * lb + j];
}

static void mul_base(const int *a, int la, const int *b, int lb, int *c, int lc, int n)
{
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) {
            int acc = 0;
            for (int k = 0; k < n; k++)
                acc += a[i * la + k] * b[k * lb + j];
            c[i * lc + j] = acc;
        }
}

static int *tmp_blk(int n)
{
    return malloc((size_t)n * n * sizeof(int));
}

static void mul_strassen(const int *a, int la, const int *b, int lb,
                         int *c, int lc, int n)
{
    if (n <= CUTOFF) {
        mul_base(a, la, b, lb, c, lc, n);
        return;
    }
    int h = n / 2;
    const int *a11 = a, *a12 = a + h, *a21 = a + la * h, *a22 = a + la * h + h;
    const int *b11 = b, *b12 = b + h, *b21 = b + lb * h, *b22 = b + lb * h + h;
    int *m1 = tmp_blk(h), *m2 = tmp_blk(h), *m3 = tmp_blk(h), *m4 = tmp_blk(h);
    int *m5 = tmp_blk(h), *m6 = tmp_blk(h), *m7 = tmp_blk(h);

#pragma omp task shared(m1)
    {
        int *t1 = tmp_blk(h), *t2 = tmp_blk(h);
        add_blk(a11, la, a22, la, t1, h, h);
        add_blk(b11, lb, b22, lb, t2, h, h);
        mul_strassen(t1, h, t2, h, m1, h, h);
        free(t1); free(t2);
    }
#pragma omp task shared(m2)
    {
        int *t1 = tmp_blk(h);
        add_blk(a21, la, a22, la, t1, h, h);
        mul_strassen(t1, h, b11, lb, m2, h, h);
        free(t1);
    }
#pragma omp task shared(m3)
    {
        int *t2 = tmp_blk(h);
        sub_blk(b12, lb, b22, lb, t2, h, h);
        mul_strassen(a11, la, t2, h, m3, h, h);
        free(t2);
    }
#pragma omp task shared(m4)
    {
        int *t2 = tmp_blk(h);
        sub_blk(b21, lb, b11, lb, t2, h, h);
        mul_strassen(a22, la, t2, h, m4, h, h);
        free(t2);
    }
#pragma omp task shared(m5)
    {
        int *t1 = tmp_blk(h);
        add_blk(a11, la, a12, la, t1, h, h);
        mul_strassen(t1, h, b22, lb, m5, h, h);
        free(t1);
    }
#pragma omp task shared(m6)
    {
        int *t1 = tmp_blk(h), *t2 = tmp_blk(h);
        sub_blk(a21, la, a11, la, t1, h, h);
        add_blk(b11, lb, b12, lb, t2, h, h);
        mul_strassen(t1, h, t2, h, m6, h, h);
        free(t1); free(t2);
    }
#pragma omp task shared(m7)
    {
        int *t1 = tmp_blk(h), *t2 = tmp_blk(h);
        sub_blk(a12, la, a22, la, t1, h, h);
        add_blk(b21, lb, b22, lb, t2, h, h);
        mul_strassen(t1, h, t2, h, m7, h, h);
        free(t1); free(t2);
    }
#pragma omp taskwait

    for (int i = 0; i < h; i++)
        for (int j = 0; j < h; j++) {
            int idx = i * h + j;
            c[i * lc + j] = m1[idx] + m4[idx] - m5[idx] + m7[idx];
            c[i * lc + j + h] = m3[idx] + m5[idx];
            c[(i + h) * lc + j] = m2[idx] + m4[idx];
            c[(i + h) * lc + j + h] = m1[idx] - m2[idx] + m3[idx] + m6[idx];
        }
    free(m1); free(m2); free(m3); free(m4); free(m5); free(m6); free(m7);
}

int main(void)
{
    int *a = tmp_blk(N), *b = tmp_blk(N), *c = tmp_blk(N);
    for (int i = 0; i < N; i++)
        for (int j = 0; j < N; j++) {
            a[i * N + j] = (i * 7 + j * 3) % 13 - 6;
            b[i * N + j] = (i * 5 + j * 11) % 17 - 8;
        }

#pragma omp parallel
    {
#pragma omp single
        mul_strassen(a, N, b, N, c, N, N);
    }

    long long checksum = 0;
    for (int i = 0; i < N; i++)
        for (int j = 0; j < N; j++)
            checksum += (long long)c[i * N + j] * (i + 2 * j + 1);
    printf("CHECK %lld\n", checksum);
    free(a); free(b); free(c);
    return 0;
}
