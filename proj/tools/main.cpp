#include "commands.hpp"

int main(int argc, char** argv) { return bsml::cli::run(argc, argv); }
