#include "commands.hpp"

int main(int argc, char** argv) { return metaseg::cli::run(argc, argv); }
