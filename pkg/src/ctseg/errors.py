"""Exception hierarchy. The CLI maps each family onto an exit code."""


class CtSegError(Exception):
    """Base class for every error raised by ctseg."""


class DataError(CtSegError):
    """Bad input data: unreadable images, inconsistent datasets, bad manifests."""


class ImageFormatError(DataError):
    """A file is not a supported 8-bit grayscale image or is malformed."""


class PipelineError(CtSegError):
    """A segmentation stage failed.

    ``stage`` names the pipeline step and ``acq_index`` the slice being
    processed, when known.
    """

    def __init__(self, message: str, stage: str | None = None, acq_index: int | None = None):
        self.stage = stage
        self.acq_index = acq_index
        prefix = ""
        if stage:
            prefix += f"[{stage}] "
        if acq_index is not None:
            prefix += f"slice {acq_index}: "
        super().__init__(prefix + message)
