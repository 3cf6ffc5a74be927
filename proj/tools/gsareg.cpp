#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "gsareg/cli.hpp"

int main(int argc, char** argv) {
    if (argc <= 1) {
        std::cout << gsareg::usage_text();
        return 2;
    }
    gsareg::RunConfig config;
    CLI::App app{"", "gsareg"};
    gsareg::build_app(app, config);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return gsareg::run_cli(config, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
