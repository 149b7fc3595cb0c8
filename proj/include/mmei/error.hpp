#pragma once

#include <stdexcept>
#include <string>

namespace mmei {

// Error kinds map onto CLI exit codes (see tools/mmei.cpp).
enum class ErrorKind {
    Shape,
    Index,
    Parameter,
    Parse,
    Schema,
    Label,
    Stratification,
    Lookup,
    Checkpoint,
    Numerical,
    Input,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define MMEI_DEFINE_ERROR(Name, Kind)                                  \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& what) : Error(Kind, what) {}  \
    };

MMEI_DEFINE_ERROR(ShapeError, ErrorKind::Shape)
MMEI_DEFINE_ERROR(IndexError, ErrorKind::Index)
MMEI_DEFINE_ERROR(ParameterError, ErrorKind::Parameter)
MMEI_DEFINE_ERROR(ParseError, ErrorKind::Parse)
MMEI_DEFINE_ERROR(SchemaError, ErrorKind::Schema)
MMEI_DEFINE_ERROR(LabelError, ErrorKind::Label)
MMEI_DEFINE_ERROR(StratificationError, ErrorKind::Stratification)
MMEI_DEFINE_ERROR(LookupError, ErrorKind::Lookup)
MMEI_DEFINE_ERROR(CheckpointError, ErrorKind::Checkpoint)
MMEI_DEFINE_ERROR(NumericalError, ErrorKind::Numerical)
MMEI_DEFINE_ERROR(InputError, ErrorKind::Input)
MMEI_DEFINE_ERROR(IoError, ErrorKind::Io)

#undef MMEI_DEFINE_ERROR

}  // namespace mmei
