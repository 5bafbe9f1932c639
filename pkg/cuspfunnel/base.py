# Standard Library
import dataclasses

# Local
from .toolbox import jsonable


class BaseResult(object):
    """Base class for the result records handed back by the checkers

    Subclasses are dataclasses; fields holding operators or matrices are listed
    in `_skip` and left out of the serialized form.
    """

    _skip = ()

    def to_dict(self):
        data = {}
        for field in dataclasses.fields(self):
            if field.name in self._skip:
                continue
            data[field.name] = jsonable(getattr(self, field.name))
        return data

    def __repr__(self):
        return f"<{self.__class__.__name__}: {self}>"  # pragma: no cover

    def __str__(self):
        summary = ", ".join(
            f"{k}={v}"
            for k, v in self.to_dict().items()
            if not isinstance(v, (list, dict))
        )
        return summary or self.__class__.__name__
