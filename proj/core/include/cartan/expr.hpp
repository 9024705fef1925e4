#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "cartan/groupjets.hpp"

namespace cartan {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " at offset " + std::to_string(pos)), pos_(pos)
    {
    }
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

// Identifier resolution: a key symbol (returned as a GenJet), or nullopt for
// a scalar indeterminate. May throw ParseError for rejected names.
using KeyResolver = std::function<std::optional<GenJet>(const std::string& name, std::size_t pos)>;

// Parse an arithmetic expression (+ - * / ^, parentheses, integers, exact
// decimals are not accepted) that is linear in key symbols. The constant
// part is stored under the unit key.
GenComb parse_linear(const std::string& text, const KeyResolver& keys);

// Parse a rational function in scalar indeterminates.
RatFun parse_ratfun(const std::string& text);

// Identifier syntax shared with the problem-file reader: a letter followed by
// letters, digits, '_' and '^' (the latter only when followed by a letter).
bool is_identifier(const std::string& s);

} // namespace cartan
