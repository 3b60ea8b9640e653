// command line front end, subcommands land here as the library fills out
#include <cstdio>

int main(int argc, char** argv) {
    (void)argc;
    (void)argv;
    std::fprintf(stderr, "ffcm: no subcommands wired up yet\n");
    return 2;
}
