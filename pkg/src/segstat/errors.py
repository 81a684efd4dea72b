"""Exception types shared across the package.

InputError covers everything a user can fix (bad files, bad config,
violated preconditions); the command line maps it to exit code 1.
InternalError marks a broken invariant inside the pipeline itself and
maps to exit code 2.
"""


class InputError(ValueError):
    pass


class InternalError(RuntimeError):
    pass
