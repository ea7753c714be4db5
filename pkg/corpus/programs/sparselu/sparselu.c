/* Blocked LU factorization sweep: per step, a row update loop and a
 * row-elimination loop over independent blocks. */
#include <stdio.h>
#include <stdlib.h>

#define NB 16
#define BS 8

static double *M[NB][NB];

static void lu0(double *diag)
{
    for (int k = 0; k < BS; k++)
        for (int i = k + 1; i < BS; i++) {
            diag[i * BS + k] /= diag[k * BS + k];
            for (int j = k + 1; j < BS; j++)
                diag[i * BS + j] -= diag[i * BS + k] * diag[k * BS + j];
        }
}

static void fwd(const double *diag, double *row)
{
    for (int k = 0; k < BS; k++)
        for (int i = k + 1; i < BS; i++)
            for (int j = 0; j < BS; j++)
                row[i * BS + j] -= diag[i * BS + k] * row[k * BS + j];
}

static void bdiv(const double *diag, double *col)
{
    for (int i = 0; i < BS; i++)
        for (int k = 0; k < BS; k++) {
            col[i * BS + k] /= diag[k * BS + k];
            for (int j = k + 1; j < BS; j++)
                col[i * BS + j] -= col[i * BS + k] * diag[k * BS + j];
        }
}

static void bmod(const double *row, const double *col, double *inner)
{
    for (int i = 0; i < BS; i++)
        for (int k = 0; k < BS; k++)
            for (int j = 0; j < BS; j++)
                inner[i * BS + j] -= row[i * BS + k] * col[k * BS + j];
}

static void genmat(void)
{
#pragma omp single
    {
        for (int i = 0; i < NB; i++)
            for (int j = 0; j < NB; j++) {
                M[i][j] = malloc(BS * BS * sizeof(double));
                for (int e = 0; e < BS * BS; e++) {
                    double v = ((i * 31 + j * 17 + e * 7) % 29 + 1) / 29.0;
                    M[i][j][e] = (i == j && e % (BS + 1) == 0) ? v + BS : v;
                }
            }
    }
}

static void factorize(void)
{
    for (int k = 0; k < NB; k++) {
        lu0(M[k][k]);
#pragma omp parallel for
        for (int j = k + 1; j < NB; j++)
            fwd(M[k][k], M[k][j]);
#pragma omp parallel for
        for (int i = k + 1; i < NB; i++) {
            bdiv(M[k][k], M[i][k]);
            for (int j = k + 1; j < NB; j++)
                bmod(M[i][k], M[k][j], M[i][j]);
        }
    }
}

int main(void)
{
    genmat();
    factorize();
    double checksum = 0.0;
    for (int i = 0; i < NB; i++)
        for (int j = 0; j < NB; j++)
            for (int e = 0; e < BS * BS; e++)
                checksum += M[i][j][e] * ((i + j + e) % 7 + 1);
    printf("CHECK %.6f\n", checksum);
    for (int i = 0; i < NB; i++)
        for (int j = 0; j < NB; j++)
            free(M[i][j]);
    return 0;
}
