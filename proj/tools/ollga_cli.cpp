#include <ollga/cli.hpp>

int main(int argc, char** argv) { return ollga::cli::execute(argc, argv); }
