import importlib.util
import logging
import sys
from os import PathLike
from pathlib import Path
from types import ModuleType
from typing import Callable, Union

from projeuler.core.model import SdeModel

logger = logging.getLogger(__name__)


def _load_module(path: Union[str, PathLike]) -> ModuleType:
    path_obj = Path(path)
    if not path_obj.is_file():
        raise FileNotFoundError(f"model profile not found: {path_obj}")
    module_name = path_obj.stem
    spec = importlib.util.spec_from_file_location(module_name, path_obj)
    if spec is None or spec.loader is None:
        raise ImportError(f"cannot import model profile {path_obj}")
    module = importlib.util.module_from_spec(spec)
    sys.modules[module_name] = module
    spec.loader.exec_module(module)
    return module


def load_model_from_file(profile_path: Union[str, PathLike]) -> SdeModel:
    """
    Loading a profile which has a `MODEL` variable.
    The directory of the profile is added to sys.path.

    Args:
        profile_path (PathLike): Path to a Python file defining `MODEL`, an `SdeModel`.

    Raises:
        NotImplementedError: The profile does not define `MODEL`.
        TypeError: `MODEL` is not an `SdeModel`.
    """
    sys.path.append(str(Path(profile_path).parent))
    module = _load_module(profile_path)
    if not hasattr(module, "MODEL"):
        raise NotImplementedError("MODEL is not defined in the profile.")
    model = getattr(module, "MODEL")
    if not isinstance(model, SdeModel):
        raise TypeError("MODEL must be a projeuler SdeModel.")
    return model


def load_factory_from_file(profile_path: Union[str, PathLike]) -> Callable[..., SdeModel]:
    """
    Loading the `FACTORY` function of a profile.

    Raises:
        NotImplementedError: The profile does not define `FACTORY`.
    """
    sys.path.append(str(Path(profile_path).parent))
    module = _load_module(profile_path)
    if not hasattr(module, "FACTORY"):
        raise NotImplementedError("FACTORY is not defined in the profile")
    factory: Callable[..., SdeModel] = getattr(module, "FACTORY")
    return factory


def load_parametrized_model_from_file(
    profile_path: Union[str, PathLike], *factory_args: str
) -> SdeModel:
    factory = load_factory_from_file(profile_path)
    model = factory(*factory_args)
    if not isinstance(model, SdeModel):
        raise TypeError("FACTORY must return a projeuler SdeModel.")
    return model


def load_model(profile_path: Union[str, PathLike], *factory_args: str) -> SdeModel:
    """
    Loading a model from a profile, in either the `MODEL` or the `FACTORY` form.

    Arguments are passed to `FACTORY` and ignored, with a warning, for `MODEL`.
    """
    try:
        model = load_model_from_file(profile_path)
        _check_args_num_mismatch(len(factory_args))
        return model
    except NotImplementedError:
        return load_parametrized_model_from_file(profile_path, *factory_args)


def _check_args_num_mismatch(num_args: int) -> None:
    if num_args > 0:
        logger.warning(f"Warning: {num_args} arguments are ignored.")
