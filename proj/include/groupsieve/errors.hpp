#pragma once

#include <stdexcept>
#include <string>

namespace groupsieve {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two operands built from different group specifications.
struct spec_mismatch_error : error {
    using error::error;
};

struct invalid_modulus_error : error {
    using error::error;
};

// A computation hit its configured resource budget. `limiting` names the
// parameter (modulus, element, ...) that stopped it.
struct budget_error : error {
    std::string limiting;
    budget_error(const std::string& what, std::string lim)
        : error(what), limiting(std::move(lim)) {}
};

struct not_found_error : error {
    using error::error;
};

struct bad_reduction_error : error {
    using error::error;
};

struct invalid_torus_error : error {
    using error::error;
};

struct insufficient_data_error : error {
    using error::error;
};

struct certification_needed_error : error {
    using error::error;
};

// A downstream stage received data violating an upstream contract
// (e.g. a bad place at or below the torus-order threshold).
struct pipeline_violation_error : error {
    using error::error;
};

struct pigeonhole_violation_error : error {
    using error::error;
};

struct config_error : error {
    using error::error;
};

}  // namespace groupsieve
