#include "mnb/version.hpp"
#include <cstdio>
int main() { std::printf("%s\n", mnb::kVersion); }
