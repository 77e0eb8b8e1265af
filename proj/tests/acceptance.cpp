#include <cstdio>
#include <cstdlib>
#include <string>

#include "specband/acceptance.hpp"

// Usage: acceptance [criterion ids...]
int main(int argc, char** argv) {
  specband::acceptance::Options o;
  if (const char* w = std::getenv("SPECBAND_WORKERS")) o.workers = std::max(1, std::atoi(w));
  else o.workers = 4;
  for (int i = 1; i < argc; ++i) o.only.push_back(std::stoi(argv[i]));
  int failed = 0;
  specband::acceptance::run(o, [&](const specband::acceptance::Outcome& r) {
    std::printf("%s\n", specband::acceptance::format(r).c_str());
    std::fflush(stdout);
    failed += !r.pass;
  });
  std::printf("%s: %d failed\n", failed ? "FAIL" : "PASS", failed);
  return failed ? 1 : 0;
}
