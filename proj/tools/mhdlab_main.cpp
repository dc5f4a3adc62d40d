// Placeholder entry point; the full CLI is wired once all modules exist.
#include <cstdio>

int main() {
    std::printf("mhdlab: command-line interface not wired yet\n");
    return 2;
}
