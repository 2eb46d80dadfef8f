#pragma once

#include <stdexcept>
#include <string>

namespace recmeta {

// Base class for all library errors. Subclasses mirror the failure modes of
// the pipeline stages so callers can map them to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define RECMETA_DEFINE_ERROR(NAME)                                            \
    struct NAME : Error {                                                      \
        using Error::Error;                                                    \
    }

// interaction ingestion
RECMETA_DEFINE_ERROR(MissingColumnError);
RECMETA_DEFINE_ERROR(ParseError);
RECMETA_DEFINE_ERROR(EmptyFileError);
RECMETA_DEFINE_ERROR(EmptyInputError);

// preprocessing
RECMETA_DEFINE_ERROR(InsufficientInteractionsError);

// recommenders / metrics
RECMETA_DEFINE_ERROR(UnknownUserError);
RECMETA_DEFINE_ERROR(EmptyRelevantSetError);
RECMETA_DEFINE_ERROR(EmptyDatasetError);

// meta-dataset
RECMETA_DEFINE_ERROR(DatasetTooSmallError);
RECMETA_DEFINE_ERROR(SchemaMismatchError);
RECMETA_DEFINE_ERROR(IncompleteGridError);

// regressors
RECMETA_DEFINE_ERROR(DimensionMismatchError);
RECMETA_DEFINE_ERROR(NonFiniteInputError);
RECMETA_DEFINE_ERROR(EmptyGridError);

// selection study
RECMETA_DEFINE_ERROR(TooFewDatasetsError);
RECMETA_DEFINE_ERROR(LengthMismatchError);
RECMETA_DEFINE_ERROR(MalformedRankingError);

// orchestration
RECMETA_DEFINE_ERROR(IoError);
RECMETA_DEFINE_ERROR(ConfigError);

#undef RECMETA_DEFINE_ERROR

}  // namespace recmeta
