"""Exception types shared across the package."""


class MakeupPriorError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MakeupPriorError, ValueError):
    """Array shapes or lengths disagree."""


class EmptyMaskError(MakeupPriorError, ValueError):
    """A mask selects no pixels."""


class TextureFileError(MakeupPriorError):
    """Base class for texture I/O problems."""


class TextureNotFoundError(TextureFileError, FileNotFoundError):
    pass


class TextureDecodeError(TextureFileError):
    pass


class ChannelMismatchError(TextureFileError, ValueError):
    pass


class ModelFormatError(MakeupPriorError):
    """A model directory could not be read back."""


class CorruptManifestError(ModelFormatError):
    pass


class PayloadSizeError(ModelFormatError):
    pass


class ChecksumError(ModelFormatError):
    pass
