#include "etpareto/cli.hpp"

int main(int argc, char** argv) { return etpareto::cli::run(argc, argv); }
