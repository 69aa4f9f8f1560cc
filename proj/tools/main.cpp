#include <cstdio>

int main() {
    std::puts("memdp: cli not wired yet");
    return 70;
}
