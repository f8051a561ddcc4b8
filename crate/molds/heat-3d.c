/* heat-3d: Jacobi-style 3-D heat equation stencil. Prints the kernel time
 * in seconds. */
#include <stdio.h>
#include <stdlib.h>
#include <time.h>

#ifndef TSTEPS
#define TSTEPS 500
#endif
#ifndef N
#define N 120
#endif

static double A[N][N][N], B[N][N][N];

static void init(void)
{
  for (int i = 0; i < N; i++)
    for (int j = 0; j < N; j++)
      for (int k = 0; k < N; k++)
        A[i][j][k] = B[i][j][k] = (double)(i + j + (N - k)) * 10 / N;
}

static void kernel(void)
{
  int t, i, j, k;
  for (t = 1; t <= TSTEPS; t++) {
#P0
#pragma clang loop(i1,j1,k1) tile sizes(#P3,#P4,#P5)
#pragma clang loop id(i1)
    for (i = 1; i < N - 1; i++)
#pragma clang loop id(j1)
      for (j = 1; j < N - 1; j++)
#pragma clang loop id(k1)
        for (k = 1; k < N - 1; k++)
          B[i][j][k] = 0.125 * (A[i + 1][j][k] - 2.0 * A[i][j][k] + A[i - 1][j][k])
                     + 0.125 * (A[i][j + 1][k] - 2.0 * A[i][j][k] + A[i][j - 1][k])
                     + 0.125 * (A[i][j][k + 1] - 2.0 * A[i][j][k] + A[i][j][k - 1])
                     + A[i][j][k];
#P1
#P2
#pragma clang loop(i2,j2,k2) tile sizes(#P3,#P4,#P5)
#pragma clang loop id(i2)
    for (i = 1; i < N - 1; i++)
#pragma clang loop id(j2)
      for (j = 1; j < N - 1; j++)
#pragma clang loop id(k2)
        for (k = 1; k < N - 1; k++)
          A[i][j][k] = 0.125 * (B[i + 1][j][k] - 2.0 * B[i][j][k] + B[i - 1][j][k])
                     + 0.125 * (B[i][j + 1][k] - 2.0 * B[i][j][k] + B[i][j - 1][k])
                     + 0.125 * (B[i][j][k + 1] - 2.0 * B[i][j][k] + B[i][j][k - 1])
                     + B[i][j][k];
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
    sum += A[i][i][N / 2];
  fprintf(stderr, "checksum %g\n", sum);
  printf("%0.6f\n", (t1.tv_sec - t0.tv_sec) + (t1.tv_nsec - t0.tv_nsec) * 1e-9);
  return 0;
}
