/* covariance: column means, centering, then cov := data^T * data / (N-1).
 * Prints the kernel time in seconds. */
#include <stdio.h>
#include <stdlib.h>
#include <time.h>

#ifndef M
#define M 1200
#endif
#ifndef N
#define N 1400
#endif

static double data[N][M], cov[M][M], mean[M];

static void init(void)
{
  for (int i = 0; i < N; i++)
    for (int j = 0; j < M; j++)
      data[i][j] = ((double)i * j) / M;
}

static void kernel(void)
{
  int i, j, k;
  const double float_n = (double)N;
  for (j = 0; j < M; j++) {
    mean[j] = 0.0;
    for (i = 0; i < N; i++)
      mean[j] += data[i][j];
    mean[j] /= float_n;
  }
  for (i = 0; i < N; i++)
    for (j = 0; j < M; j++)
      data[i][j] -= mean[j];
#P0
#P1
#pragma clang loop(i,j,k) tile sizes(#P2,#P3,#P4) floor_ids(i1,j1,k1) tile_ids(i2,j2,k2)
#pragma clang loop id(i)
  for (i = 0; i < M; i++)
#pragma clang loop id(j)
    for (j = i; j < M; j++)
#pragma clang loop id(k)
      for (k = 0; k < N; k++)
        cov[i][j] += data[k][i] * data[k][j];
  for (i = 0; i < M; i++)
    for (j = i; j < M; j++) {
      cov[i][j] /= (float_n - 1.0);
      cov[j][i] = cov[i][j];
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
  for (int i = 0; i < M; i++)
    sum += cov[i][(i * 7) % M];
  fprintf(stderr, "checksum %g\n", sum);
  printf("%0.6f\n", (t1.tv_sec - t0.tv_sec) + (t1.tv_nsec - t0.tv_nsec) * 1e-9);
  return 0;
}
