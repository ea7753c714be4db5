void scale(double *v, int n) {
#pragma omp parallel for
    for (int i = 0; i < n; i++)
        v[i] *= 2.0;
}
