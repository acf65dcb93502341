#include "ddc/cli_app.hpp"

int main(int argc, char** argv) { return ddc::run_cli(argc, argv); }
