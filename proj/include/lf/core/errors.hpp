#pragma once

#include <stdexcept>
#include <string>

namespace lf {

// Root of every error the library throws. Subclasses name the contract that was broken.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class OracleError : public Error { using Error::Error; };
class WindowError : public Error { using Error::Error; };
class SequenceError : public Error { using Error::Error; };
class DatasetError : public Error { using Error::Error; };
class LabelError : public Error { using Error::Error; };
class MetricError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

}  // namespace lf
