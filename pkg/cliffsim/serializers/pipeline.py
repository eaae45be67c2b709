"""
.. automodsumm:: cliffsim.serializers.pipeline
   :classes-only:
   :nosignatures:
"""
from functools import reduce
from logging import getLogger
from os import makedirs
from pathlib import Path
from typing import Any, Callable, Sequence, Union

logger = getLogger(__name__)


class Stage:
    """One serialization step with ``dumps()`` and ``loads()`` methods

    Args:
        obj: Module or object providing the step, if any
        dumps: Serialization function, or the name of a method on ``obj``
        loads: Deserialization function, or the name of a method on ``obj``
    """

    def __init__(
        self,
        obj: Any = None,
        dumps: Union[str, Callable] = 'dumps',
        loads: Union[str, Callable] = 'loads',
    ):
        self.obj = obj
        self.dumps = self._resolve(dumps)
        self.loads = self._resolve(loads)

    def _resolve(self, func: Union[str, Callable]) -> Callable:
        return getattr(self.obj, func) if isinstance(func, str) else func


class SerializerPipeline:
    """Stages chained together: ``dumps()`` runs them in order, ``loads()`` in reverse. Manifests,
    reports and circuits are all written through one of these.

    Args:
        stages: :py:class:`Stage` objects, or anything else with ``dumps()`` and ``loads()``
        is_binary: Whether the final stage produces bytes
        suffix: File extension used by :py:meth:`dump` when the path has none
    """

    def __init__(self, stages: Sequence, is_binary: bool = False, suffix: str = ''):
        self.stages = list(stages)
        self.is_binary = is_binary
        self.suffix = suffix

    def dumps(self, value: Any) -> Union[str, bytes]:
        return reduce(lambda v, stage: stage.dumps(v), self.stages, value)

    def loads(self, value: Union[str, bytes]) -> Any:
        return reduce(lambda v, stage: stage.loads(v), reversed(self.stages), value)

    def dump(self, value: Any, path: Union[Path, str]) -> Path:
        """Serialize ``value`` to a file, creating parent directories as needed"""
        path = Path(path)
        if not path.suffix:
            path = path.with_suffix(self.suffix)
        makedirs(path.parent, exist_ok=True)
        content = self.dumps(value)
        if self.is_binary:
            path.write_bytes(content)
        else:
            path.write_text(content)
        logger.debug(f'Wrote {type(value).__name__} to {path}')
        return path

    def load(self, path: Union[Path, str]) -> Any:
        path = Path(path)
        return self.loads(path.read_bytes() if self.is_binary else path.read_text())

    def set_model(self, cl: type) -> 'SerializerPipeline':
        """Get a copy of this pipeline whose cattrs stages structure loaded values into ``cl``"""
        stages = [s.with_model(cl) if hasattr(s, 'with_model') else s for s in self.stages]
        return SerializerPipeline(stages, self.is_binary, self.suffix)
