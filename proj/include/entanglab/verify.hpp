#pragma once

#include <string>
#include <vector>

#include "entanglab/config.hpp"

namespace entanglab::verify {

struct Options {
    config::Tolerances tolerances;
    // Run the fermionic checks with the hard-core boson ladder rule, which
    // drops the string sign. The suite must then fail.
    bool inject_sign_bug = false;
    int threads = 1;
};

struct Check {
    std::string battery;
    std::string name;
    bool passed = false;
    double value = 0.0;     // measured deviation
    double tolerance = 0.0; // bound the value is held to
    std::string tolerance_name;
    std::string note;
};

struct Report {
    std::vector<Check> checks;
    double seconds = 0.0;

    bool passed() const;
};

Report run(const Options& options);

// One line per check plus a summary.
std::string format(const Report& report);

} // namespace entanglab::verify
