#include "dynct/cli.hpp"

#include <malloc.h>

#include <string>
#include <vector>

int main(int argc, char** argv) {
    // Large per-batch buffers are reused every iteration; keep them off mmap.
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
    return dynct::cli_main(std::vector<std::string>(argv, argv + argc));
}
