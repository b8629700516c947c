try:
    from cx_Freeze import setup, Executable
except ImportError:  # 未安装 cx_Freeze 时按普通 Python 包安装
    from setuptools import setup
    Executable = None

# 构建选项
build_exe_options = {
    "packages": ["numpy", "scipy", "cv2", "openpyxl", "core", "cli", "utils"],
    "excludes": ["tkinter", "pytest", "hypothesis"],
}

freeze_kwargs = {}
if Executable is not None:
    freeze_kwargs = {
        "options": {"build_exe": build_exe_options},
        "executables": [
            Executable(
                "main.py",
                base=None,
                target_name="irvfusion",
            )
        ],
    }

setup(
    name="irvfusion",
    version="1.0",
    description="雾天红外/可见光联合去雾融合系统",
    packages=["core", "cli", "utils"],
    py_modules=["main"],
    install_requires=["numpy", "scipy", "opencv-python-headless", "openpyxl"],
    **freeze_kwargs,
)
