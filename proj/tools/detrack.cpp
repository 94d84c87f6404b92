// Command-line entry point for the DeTrack workbench pipeline.
#include <cstdio>

int main() {
  std::puts("detrack: pipeline CLI (under construction)");
  return 0;
}
