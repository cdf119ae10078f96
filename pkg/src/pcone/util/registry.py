# Name -> builder lookup used for yield criteria and invariant suites.
import inspect
from functools import partial


class Registry(object):
    def __init__(self, name):
        self._name = name
        self._module_dict = dict()

    def __contains__(self, key):
        return key in self._module_dict

    def __iter__(self):
        return iter(self._module_dict)

    @property
    def name(self):
        return self._name

    def get(self, key):
        return self._module_dict.get(key, None)

    def build(self, key, *args, **kwargs):
        """Call the builder registered under `key`; unknown names raise KeyError."""
        builder = self.get(key)
        if builder is None:
            raise KeyError(f"'{key}' is not registered in {self.name}; known: {sorted(self._module_dict)}")
        return builder(*args, **kwargs)

    def register_with_name(self, module_name=None, force=False):
        return partial(self.register, module_name=module_name, force=force)

    def register(self, build_function, module_name=None, force=False):
        """Register a build function.

        Args:
            build_function (callable): plain function returning the registered object.
            module_name (str): lookup name; defaults to the function name.
            force (bool): overwrite an existing entry instead of raising.
        """
        if not inspect.isfunction(build_function):
            raise TypeError(
                "build_function must be a function, but got {}".format(type(build_function))
            )
        if module_name is None:
            module_name = build_function.__name__
        if not force and module_name in self._module_dict:
            raise KeyError("{} is already registered in {}".format(module_name, self.name))
        self._module_dict[module_name] = build_function

        return build_function


CRITERIA = Registry("yield criteria")
CHECK_SUITES = Registry("invariant suites")
