#pragma once

#include <stdexcept>
#include <string>

namespace respetri {

/// Base class for every exception thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownTransition : public Error {
 public:
  explicit UnknownTransition(const std::string& id)
      : Error("unknown transition '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// A predicate or rule names a place, transition, mode or forbidden
/// predicate that the net does not declare.
class UnknownReference : public Error {
 public:
  explicit UnknownReference(const std::string& id)
      : Error("unknown reference '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// Firing was requested for a transition that is not enabled.
class NotEnabled : public Error {
 public:
  explicit NotEnabled(const std::string& id)
      : Error("transition '" + id + "' is not enabled"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

}  // namespace respetri
