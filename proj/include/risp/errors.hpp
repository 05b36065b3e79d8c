#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace risp {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A linear system whose matrix fell below the rank tolerance.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::size_t effective_rank)
      : Error(what), effective_rank_(effective_rank) {}
  std::size_t effective_rank() const noexcept { return effective_rank_; }

 private:
  std::size_t effective_rank_;
};

/// NMSE against an all-zero reference is undefined.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Scaling correction hit a near-zero anchor entry.
class IllConditionedCorrectionError : public Error {
 public:
  IllConditionedCorrectionError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, std::size_t epoch)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// A baseline configuration that violates its own feasibility condition.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace risp
