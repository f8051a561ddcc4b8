/* Placeholder mold for the synthetic mock_tiny problem. */
#include <stdio.h>

int main(void)
{
#P0
#P1
  printf("%d %d\n", #P2, #P3);
  return 0;
}
