# Scenario files: yaml/json documents with `_base_` inheritance and dotted overrides.
import os.path as osp
from argparse import Action

from addict import Dict
from yapf.yapflib.yapf_api import FormatCode

from ..errors import ScenarioError
from .fileio import dump as dump_file, load

BASE_KEY = "_base_"
DELETE_KEY = "_delete_"
RESERVED_KEYS = ["filename", "pretty_text", "dump", "merge_from_dict", "to_dict"]


def check_file_exist(filename, msg_tmpl='file "{}" does not exist'):
    if not osp.isfile(filename):
        raise FileNotFoundError(msg_tmpl.format(filename))


class ConfigDict(Dict):
    def __missing__(self, name):
        raise KeyError(name)

    def __getattr__(self, name):
        try:
            value = super(ConfigDict, self).__getattr__(name)
        except KeyError:
            ex = AttributeError(f"'{self.__class__.__name__}' object has no " f"attribute '{name}'")
        except Exception as e:
            ex = e
        else:
            return value
        raise ex


class ScenarioConfig(object):
    """
    A scenario document with attribute access.

    Example:
        >>> cfg = ScenarioConfig(dict(version="pc/1", moduli=dict(lame=[1.0, 1.0])))
        >>> cfg.moduli.lame
        [1.0, 1.0]
        >>> cfg = ScenarioConfig.fromfile("plastic_bar.yaml")
        >>> cfg.criterion
        'von_mises'

    A file may name one or more sibling files under ``_base_``; their keys are
    merged first and the file's own keys override them. A sub-dict carrying
    ``_delete_: true`` replaces the inherited sub-dict instead of merging.
    """

    @staticmethod
    def _file2dict(filename):
        filename = osp.abspath(osp.expanduser(filename))
        check_file_exist(filename)
        if filename.lower().endswith((".yml", ".yaml", ".json")):
            cfg_dict = load(filename)
        else:
            raise ScenarioError("only yml/yaml/json scenario files are supported", field=filename)
        if cfg_dict is None:
            cfg_dict = {}
        if not isinstance(cfg_dict, dict):
            raise ScenarioError("top level of a scenario must be a mapping", field=filename)

        if BASE_KEY in cfg_dict:
            cfg_dir = osp.dirname(filename)
            base_filename = cfg_dict.pop(BASE_KEY)
            base_filename = base_filename if isinstance(base_filename, list) else [base_filename]

            cfg_dict_list = [ScenarioConfig._file2dict(osp.join(cfg_dir, f)) for f in base_filename]

            base_cfg_dict = dict()
            for c in cfg_dict_list:
                if len(base_cfg_dict.keys() & c.keys()) > 0:
                    raise ScenarioError("duplicate key among bases", field=BASE_KEY)
                base_cfg_dict.update(c)

            cfg_dict = ScenarioConfig._merge_a_into_b(cfg_dict, base_cfg_dict)

        return cfg_dict

    @staticmethod
    def _merge_a_into_b(a, b):
        """Merge dict `a` into dict `b` without touching either; values in `a` win."""
        if not isinstance(a, dict):
            return a

        b = b.copy()
        for k, v in a.items():
            if isinstance(v, dict) and k in b and not v.pop(DELETE_KEY, False):
                if not isinstance(b[k], dict) and not isinstance(b[k], list):
                    raise ScenarioError(
                        f"cannot inherit: mapping in the child but {type(b[k]).__name__} in the base. "
                        f"Set `{DELETE_KEY}: true` to replace the base value",
                        field=str(k),
                    )
                b[k] = ScenarioConfig._merge_a_into_b(v, b[k])
            elif isinstance(b, list):
                try:
                    index = int(k)
                except (TypeError, ValueError):
                    raise ScenarioError(f"list index must be an integer, got {k!r}", field=str(k))
                b[index] = ScenarioConfig._merge_a_into_b(v, b[index])
            elif isinstance(v, dict):
                v.pop(DELETE_KEY, None)
                b[k] = v
            else:
                b[k] = v

        return b

    @staticmethod
    def fromfile(filename):
        return ScenarioConfig(ScenarioConfig._file2dict(filename), filename=filename)

    def __init__(self, cfg_dict=None, filename=None):
        if cfg_dict is None:
            cfg_dict = dict()
        elif not isinstance(cfg_dict, dict):
            raise TypeError("cfg_dict must be a dict, but " f"got {type(cfg_dict)}")
        for key in cfg_dict:
            if key in RESERVED_KEYS:
                raise ScenarioError("key is reserved", field=key)

        super(ScenarioConfig, self).__setattr__("_cfg_dict", ConfigDict(cfg_dict))
        super(ScenarioConfig, self).__setattr__("_filename", filename)

    @property
    def filename(self):
        return self._filename

    @property
    def pretty_text(self):
        """The resolved scenario as a yapf-formatted ``dict(...)`` literal."""
        text = "scenario = " + repr(self._cfg_dict.to_dict())
        yapf_style = dict(
            based_on_style="pep8",
            column_limit=100,
            split_before_expression_after_opening_paren=True,
        )
        text, _ = FormatCode(text, style_config=yapf_style)
        return text

    def __repr__(self):
        return f"ScenarioConfig (path: {self.filename}): {self._cfg_dict.__repr__()}"

    def __getattr__(self, name):
        return getattr(self._cfg_dict, name)

    def to_dict(self):
        return self._cfg_dict.to_dict()

    def dump(self, file):
        """Write the resolved scenario, bases merged and overrides applied, as yaml or json."""
        dump_file(self.to_dict(), file)

    def merge_from_dict(self, options):
        """Merge dotted-key overrides into the scenario.

        Examples:
            >>> cfg = ScenarioConfig(dict(grid=dict(n_cells=100)))
            >>> cfg.merge_from_dict({"grid.n_cells": 400, "moduli.rho": 2.0})
            >>> cfg.grid.n_cells
            400

        Args:
            options (dict): overrides as parsed by :class:`DictAction`.
        """
        option_cfg_dict = {}
        for full_key, v in options.items():
            d = option_cfg_dict
            key_list = full_key.split(".")
            for subkey in key_list[:-1]:
                d.setdefault(subkey, dict())
                d = d[subkey]
            d[key_list[-1]] = v

        cfg_dict = self._cfg_dict.to_dict()
        super(ScenarioConfig, self).__setattr__(
            "_cfg_dict", ConfigDict(ScenarioConfig._merge_a_into_b(option_cfg_dict, cfg_dict))
        )


class DictAction(Action):
    """
    argparse action to split an argument into KEY=VALUE form
    on the first = and append to a dictionary. List options should
    be passed as comma separated values, i.e KEY=V1,V2,V3
    """

    @staticmethod
    def _parse_int_float_bool(val):
        try:
            return int(val)
        except ValueError:
            pass
        try:
            return float(val)
        except ValueError:
            pass
        if val.lower() in ["true", "false"]:
            return True if val.lower() == "true" else False
        if val.lower() in ["none", "null"]:
            return None
        return val

    def __call__(self, parser, namespace, values, option_string=None):
        options = {}
        for kv in values:
            if "=" not in kv:
                parser.error(f"expected KEY=VALUE, got {kv!r}")
            key, val = kv.split("=", maxsplit=1)
            val = [self._parse_int_float_bool(v) for v in val.split(",")]
            if len(val) == 1:
                val = val[0]
            options[key] = val
        setattr(namespace, self.dest, options)
