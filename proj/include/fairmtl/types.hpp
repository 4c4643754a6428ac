#pragma once
// Small vocabulary types shared across modules.

#include <string>

#include "fairmtl/errors.hpp"

namespace fairmtl {

// Sensitive-group identifier. Groups are opaque integer labels; no ordering
// semantics beyond providing a canonical sort for deterministic iteration.
using GroupLabel = int;

enum class TaskKind {
    regression,    // unbounded real-valued output
    binary_score,  // output is a probability-like score in [0,1]
};

inline const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::regression: return "regression";
        case TaskKind::binary_score: return "binary_score";
    }
    fail(errc::invalid_config, "unknown task kind");
}

inline TaskKind task_kind_from_string(const std::string& s) {
    if (s == "regression") return TaskKind::regression;
    if (s == "binary_score") return TaskKind::binary_score;
    fail(errc::invalid_config, "unknown task kind '" + s + "'");
}

}  // namespace fairmtl
