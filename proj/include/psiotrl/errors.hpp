#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace psiotrl {

/// Index outside a table or enumeration.
class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A value violates a domain invariant: a non-finite reward, an allocation
/// above link capacity, a QoS class that does not match its topic.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scenario file could not be loaded. Carries one diagnostic per offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, std::vector<std::string> diagnostics)
        : std::runtime_error(format(path, diagnostics)),
          path_(std::move(path)),
          diagnostics_(std::move(diagnostics)) {}

    const std::string& path() const noexcept { return path_; }
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    static std::string format(const std::string& path, const std::vector<std::string>& diags) {
        std::string msg = path + ": invalid scenario config";
        for (const auto& d : diags) {
            msg += "\n  ";
            msg += d;
        }
        return msg;
    }

    std::string path_;
    std::vector<std::string> diagnostics_;
};

}  // namespace psiotrl
