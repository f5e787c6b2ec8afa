#include <cstdio>

int main(int, char**) {
    std::puts("driftsim CLI placeholder");
    return 0;
}
