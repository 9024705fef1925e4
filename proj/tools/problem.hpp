#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cartan/framekit.hpp"

namespace cartan::cli {

class Diagnostic : public std::runtime_error {
public:
    Diagnostic(const std::string& msg, std::size_t line, std::size_t col)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg), line_(line), col_(col)
    {
    }
    std::size_t line() const { return line_; }
    std::size_t column() const { return col_; }

private:
    std::size_t line_, col_;
};

// Source location of a statement: offset of its first character.
struct Located {
    std::string text;
    std::size_t offset = 0;
    bool operator==(const Located& o) const { return text == o.text; }
};

struct GeneratorDecl {
    std::string name;
    std::vector<std::string> args; // empty: all base coordinates
    std::string lifted;            // empty: default name
    bool operator==(const GeneratorDecl& o) const = default;
};

struct GridAxis {
    std::string var;
    Rational lo, hi;
    int steps = 1;
    bool operator==(const GridAxis& o) const = default;
};

struct SurfaceDecl {
    std::string name;
    std::vector<std::string> params;
    std::vector<Located> invariants;
    std::vector<std::vector<Located>> derive;
    std::vector<GridAxis> grid;
    bool operator==(const SurfaceDecl& o) const = default;
};

struct Problem {
    std::vector<std::string> base;
    std::vector<GeneratorDecl> group;
    std::vector<Located> det;
    std::vector<std::string> independent, dependent;
    std::vector<Located> xsec;   // normalizations, in order
    std::vector<Located> assume; // "Q_p4 != 0", "Q_p2x2 == 0"
    std::vector<Located> symbol; // explicit T-module polynomials
    std::optional<Located> ode;  // right side F of q = F
    std::vector<SurfaceDecl> surfaces;
    std::string source;          // original text, for diagnostics

    bool operator==(const Problem& o) const
    {
        return base == o.base && group == o.group && det == o.det && independent == o.independent &&
               dependent == o.dependent && xsec == o.xsec && assume == o.assume && symbol == o.symbol &&
               ode == o.ode && surfaces == o.surfaces;
    }
};

// Throws Diagnostic with a line and column.
Problem parse_problem(const std::string& text);
// Canonical text; parse(unparse(p)) == p.
std::string unparse(const Problem& p);

// Line and column (1-based) of an offset in the source.
std::pair<std::size_t, std::size_t> location(const std::string& text, std::size_t offset);

// Resolved objects built from a problem; throws Diagnostic on unknown
// symbols or malformed relations.
struct Model {
    std::shared_ptr<DeterminingSystem> system;
    std::unique_ptr<MovingFrame> frame; // when a split is given
    CrossSection section;
};

Model build_model(const Problem& p);
std::shared_ptr<DeterminingSystem> build_system(const Problem& p);

} // namespace cartan::cli
