#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "ipcamo/aig.hpp"

namespace ipcamo {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// ASCII AIGER ("aag"), combinational subset.  PIs come first, followed by a
// constant node if any literal 0/1 is referenced, the ANDs in topological
// order and finally the POs.  Symbol lines name PIs and POs.
AigGraph parse_aiger(const std::string& text);
AigGraph read_aiger_file(const std::string& path);

// Throws GraphError for non-canonical graphs.  PIs are numbered by ordinal,
// ANDs in node order; a constant node is written as literal 1.
std::string write_aiger(const AigGraph& g);

}  // namespace ipcamo
