// errors.hpp — exception hierarchy shared by all qra modules

#pragma once

#include <stdexcept>
#include <string>

namespace qra {

// Argument or parameter outside its mathematical domain.
class domain_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// API contract violated (wrong variant, missing argument, bad call order).
class usage_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A numerical routine failed to reach its tolerance or budget.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what, double error_estimate = 0.0)
        : std::runtime_error(what), error_estimate_(error_estimate) {}
    double error_estimate() const noexcept { return error_estimate_; }

private:
    double error_estimate_;
};

// Survival solve reached its time cap with probability mass still unabsorbed.
class incomplete_absorption : public numerical_error {
public:
    incomplete_absorption(const std::string& what, double residual_mass)
        : numerical_error(what, residual_mass), residual_mass_(residual_mass) {}
    double residual_mass() const noexcept { return residual_mass_; }

private:
    double residual_mass_;
};

// Malformed or inconsistent run configuration.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace qra
