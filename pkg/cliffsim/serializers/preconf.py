"""Complete serializers for manifests and reports, built on the `pre-configured cattrs converters
<https://cattrs.readthedocs.io/en/latest/preconf.html>`_ for each format. Each pipeline runs the
format's converter first, which turns models into the builtin types the format supports, then the
format's own ``dumps()``.

Optional formats whose library isn't installed are placeholder classes, which raise an
``ImportError`` when used rather than when imported.

.. automodsumm:: cliffsim.serializers.preconf
   :nosignatures:
"""
from functools import partial

import tomlkit
from attr import asdict
from cattr.preconf import json as json_preconf
from cattr.preconf import tomlkit as tomlkit_preconf

from .._utils import get_placeholder_class
from ..models import DeviceEmulatorConfig
from .cattrs import CattrStage
from .pipeline import SerializerPipeline, Stage

#: Unstructures models into dicts, with no format-specific conversion
dict_serializer = CattrStage()

# ujson is optional; the stdlib module has the same dumps/loads interface
try:
    import ujson as json
    from cattr.preconf import ujson as ujson_preconf

    _json_converter = CattrStage(ujson_preconf.make_converter)
except ImportError:
    import json  # type: ignore

    _json_converter = CattrStage(json_preconf.make_converter)

#: JSON, used for reports, fit results and the manifest copy next to each result table
json_serializer = SerializerPipeline(
    [_json_converter, Stage(dumps=partial(json.dumps, indent=2), loads=json.loads)],
    suffix='.json',
)


def _drop_none(value):
    """TOML has no null; leave out ``None`` values so they fall back to model defaults"""
    if isinstance(value, dict):
        return {k: _drop_none(v) for k, v in value.items() if v is not None}
    if isinstance(value, list):
        return [_drop_none(v) for v in value]
    return value


def _make_toml_converter(*args, **kwargs):
    """tomlkit converter that writes exact measurement (``n_shots=None``) as ``n_shots = 0``,
    which the device config reads back as ``None``
    """
    converter = tomlkit_preconf.make_converter(*args, **kwargs)
    converter.register_unstructure_hook(
        DeviceEmulatorConfig, lambda obj: {**asdict(obj), 'n_shots': obj.n_shots or 0}
    )
    return converter


#: TOML, the format for hand-written experiment manifests
toml_serializer = SerializerPipeline(
    [
        CattrStage(_make_toml_converter),
        Stage(
            dumps=lambda d: tomlkit.dumps(_drop_none(d)),
            loads=lambda s: tomlkit.parse(s).unwrap(),
        ),
    ],
    suffix='.toml',
)

try:
    import yaml
    from cattr.preconf import pyyaml as yaml_preconf

    #: YAML, an alternative format for manifests and verify reports
    yaml_serializer = SerializerPipeline(
        [
            CattrStage(yaml_preconf.make_converter),
            Stage(yaml, loads='safe_load', dumps='safe_dump'),
        ],
        suffix='.yaml',
    )
except ImportError as e:
    yaml_serializer = get_placeholder_class(e)
