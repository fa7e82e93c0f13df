#ifndef CIPS_ERRORS_HPP
#define CIPS_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cips {

// Error taxonomy maps onto CLI exit codes: config -> 2, numerical -> 3,
// invariant -> 4. Anything else is a plain bug.

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Violation of a structural invariant (conservation, domination, ...).
// These indicate a bug in the simulator, not bad input.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

// Runs one ensemble path, annotating any failure with the path index and
// derived seed so it can be replayed in isolation (replay-seed command).
template <typename Fn>
void with_path_context(std::size_t path_index, std::uint64_t seed, Fn&& fn) {
  auto annotate = [&](const char* what) {
    return "path " + std::to_string(path_index) + " (replay seed " + std::to_string(seed) +
           "): " + what;
  };
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(annotate(e.what()));
  } catch (const NumericalError& e) {
    throw NumericalError(annotate(e.what()));
  } catch (const InvariantError& e) {
    throw InvariantError(annotate(e.what()));
  }
}

}  // namespace cips

#endif  // CIPS_ERRORS_HPP
