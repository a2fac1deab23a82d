// Reads a JSON array of Python sources on stdin and prints a JSON array of
// s-expressions, one per source. Used to diff against the reference grammar.

#include "syntaxeval/python_parser.hpp"

#include <json.hpp>

#include <iostream>
#include <iterator>

int main(int argc, char** argv) {
    using syntaxeval::ast::parse_python;
    if (argc == 3 && std::string_view(argv[1]) == "--sexp") {
        std::cout << parse_python(argv[2]).to_sexp() << '\n';
        return 0;
    }
    const std::string input{std::istreambuf_iterator<char>(std::cin), {}};
    nlohmann::json out = nlohmann::json::array();
    for (const auto& src : nlohmann::json::parse(input)) out.push_back(parse_python(src.get<std::string>()).to_sexp());
    std::cout << out.dump() << '\n';
    return 0;
}
