#pragma once

#include <stdexcept>
#include <string>

namespace tqre {

// Precondition violated: bad parameter, mismatched shapes, empty input.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// The requested role cannot act in this game (e.g. the responder in a
// sequential game, whose choices are never elicited).
class RoleUnsupported : public DomainError {
 public:
  explicit RoleUnsupported(const std::string& what) : DomainError(what) {}
};

// Observed data does not fit the game's action sets.
class DimensionMismatch : public DomainError {
 public:
  explicit DimensionMismatch(const std::string& what) : DomainError(what) {}
};

class InsufficientData : public DomainError {
 public:
  explicit InsufficientData(const std::string& what) : DomainError(what) {}
};

}  // namespace tqre
