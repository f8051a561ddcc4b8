/* lu: in-place LU decomposition without pivoting. Prints the kernel time
 * in seconds. */
#include <stdio.h>
#include <stdlib.h>
#include <time.h>

#ifndef N
#define N 2000
#endif

static double A[N][N];

static void init(void)
{
  for (int i = 0; i < N; i++) {
    for (int j = 0; j <= i; j++)
      A[i][j] = (double)(-j % N) / N + 1;
    for (int j = i + 1; j < N; j++)
      A[i][j] = 0;
    A[i][i] = 1;
  }
  /* make the matrix positive semi-definite so the factorization is stable */
  static double T[N][N];
  for (int r = 0; r < N; r++)
    for (int s = 0; s < N; s++)
      T[r][s] = 0;
  for (int t = 0; t < N; t++)
    for (int r = 0; r < N; r++)
      for (int s = 0; s < N; s++)
        T[r][s] += A[r][t] * A[s][t];
  for (int r = 0; r < N; r++)
    for (int s = 0; s < N; s++)
      A[r][s] = T[r][s];
}

static void kernel(void)
{
  int i, j, k;
#P0
#P1
#pragma clang loop(i,j,k) tile sizes(#P2,#P3,#P4) floor_ids(i1,j1,k1) tile_ids(i2,j2,k2)
#pragma clang loop id(i)
  for (i = 0; i < N; i++) {
    for (j = 0; j < i; j++) {
      for (k = 0; k < j; k++)
        A[i][j] -= A[i][k] * A[k][j];
      A[i][j] /= A[j][j];
    }
#pragma clang loop id(j)
    for (j = i; j < N; j++)
#pragma clang loop id(k)
      for (k = 0; k < i; k++)
        A[i][j] -= A[i][k] * A[k][j];
  }
}

int main(void)
{
  struct timespec t0, t1;
  double sum = 0.0;
  init();
  clock_gettime(CLOCK_MONOTONIC, &t0);
  kernel();
  clock_gettime(CLOCK_MONOTONIC, &t1);
  for (int i = 0; i < N; i++)
    sum += A[i][i];
  fprintf(stderr, "checksum %g\n", sum);
  printf("%0.6f\n", (t1.tv_sec - t0.tv_sec) + (t1.tv_nsec - t0.tv_nsec) * 1e-9);
  return 0;
}
