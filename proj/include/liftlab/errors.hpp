#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace liftlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a graph is not acyclic. `cycle` lists vertices in cycle order.
class CycleDetected : public Error {
public:
    CycleDetected(std::vector<int> cycle, const std::string& what)
        : Error(what), cycle(std::move(cycle)) {}
    std::vector<int> cycle;
};

#define LIFTLAB_ERROR(Name)                                                    \
    class Name : public Error {                                                \
    public:                                                                    \
        using Error::Error;                                                    \
    };

LIFTLAB_ERROR(InvalidGraph)
LIFTLAB_ERROR(NotAHomomorphism)
LIFTLAB_ERROR(DomainMismatch)
LIFTLAB_ERROR(IndexMismatch)
LIFTLAB_ERROR(ParseError)
LIFTLAB_ERROR(ValidationError)
LIFTLAB_ERROR(UnknownPrimitive)
LIFTLAB_ERROR(BadHomomorphism)
LIFTLAB_ERROR(BadInputNaming)
LIFTLAB_ERROR(MissingInput)
LIFTLAB_ERROR(ShapeMismatch)
LIFTLAB_ERROR(ConfigError)
LIFTLAB_ERROR(NonPositiveRadius)
LIFTLAB_ERROR(UnverifiedMorphism)
LIFTLAB_ERROR(EpsilonBelowWitness)
LIFTLAB_ERROR(EmptyDataset)
LIFTLAB_ERROR(BadMagic)
LIFTLAB_ERROR(TruncatedFile)
LIFTLAB_ERROR(IoError)
LIFTLAB_ERROR(Unsupported)

#undef LIFTLAB_ERROR

}  // namespace liftlab
