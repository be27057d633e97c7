#include "cli_app.hpp"

int main(int argc, char** argv) { return knc::cli::run(argc, argv); }
