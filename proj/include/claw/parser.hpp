#pragma once

#include "claw/expr.hpp"

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace claw {

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& msg, int line, int column)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line(line), column(column), message(msg) {}
    int line;
    int column;
    std::string message;
};

struct NamedLaw {
    std::string name;
    Expr density;
    Expr flux;
};

struct HamiltonianBlock {
    Expr h;
    Eigen::MatrixXd eta;
    std::vector<std::vector<Rational>> eta_exact; // row-major, same values as eta
};

/// Parsed form of a `.claw` system file.
///
/// A primal file declares one flux per variable; derived (parametric) files
/// additionally carry one density expression per variable. The grammar is
/// whitespace-insensitive with `#` line comments:
///
///   file      := "system" IDENT block
///   block     := "vars" IDENT ("," IDENT)* ";" decl*
///   decl      := "density" IDENT ":" expr ";"
///              | "flux" IDENT ":" expr ";"
///              | "law" IDENT ":" expr "|" expr ";"
///              | "hamiltonian" ":" expr "eta" "[" rows "]" ";"
///              | "domain" "[" REAL "," REAL "]" ";"
///   expr      := term (("+"|"-") term)*
///   term      := factor (("*"|"/") factor)*
///   factor    := ("-")? atom ("^" INT)?
///   atom      := REAL | IDENT | "(" expr ")"
///
/// Numeric literals are exact rationals; arithmetic between literals folds
/// into a single constant at parse time so printed rationals like "1/2"
/// round-trip to the same tree.
struct SourceSpec {
    std::string name;
    std::vector<std::string> variables;
    std::vector<Expr> densities; // empty for primal systems
    std::vector<Expr> fluxes;    // one per variable
    std::vector<NamedLaw> laws;
    std::optional<HamiltonianBlock> hamiltonian;
    std::optional<std::pair<double, double>> domain;

    bool is_primal() const { return densities.empty(); }
    int n() const { return static_cast<int>(variables.size()); }
};

SourceSpec parse_source(const std::string& text);
SourceSpec parse_file(const std::string& path);

/// Serializes a spec back into the DSL; parse_source(format_source(s)) yields
/// structurally equal expressions.
std::string format_source(const SourceSpec& spec);

/// Expression parser entry point for tests and tools: parses `text` against
/// a fixed variable list.
Expr parse_expression(const std::string& text, const std::vector<std::string>& variables);

std::string expr_str_named(const Expr& e, const std::vector<std::string>& names);

} // namespace claw
