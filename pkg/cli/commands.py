"""
子命令处理函数

每个子命令一个处理函数，参数为 argparse 解析结果，返回进程退出码。
异常向上抛出，由 cli.app 统一映射为退出码。

单对图像与批量目录:
    dehaze / fuse / baseline 的 --ir 与 --vis 可以是两个 PNG 文件，
    也可以是两个目录（按同名文件配对），批量时输出写入 out/<类别>/<名称>.png。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import dataclasses
import logging
import os
from typing import Iterator, Tuple

import numpy as np

from core import haze_model
from core.baseline import two_stage_baseline
from core.config import load_config
from core.data_models import HazeParams
from core.datasets import synthesize_suite, write_dataset
from core.errors import DatasetError, RegistrationError
from core.image_io import read_ir, read_rgb, write_png
from core.pipeline import density_at, infer, load_model, run_pipeline
from core.report import evaluate_directory, write_report
from core.selftest import run_gradcheck_suite, run_selftest
from core.tensor_io import read_tensor, write_tensor
from core.trainer import train_from_directory
from utils import ensure_dir, make_rng


def _iter_inputs(ir: str, vis: str) -> Iterator[Tuple[str, str, str]]:
    """产生 (名称, 红外路径, 可见光路径)；单对文件时名称为空串"""
    if os.path.isdir(ir) != os.path.isdir(vis):
        raise DatasetError("--ir 与 --vis 必须同为文件或同为目录")
    if not os.path.isdir(ir):
        yield "", ir, vis
        return
    names = sorted(n for n in os.listdir(vis) if n.lower().endswith(".png"))
    if not names:
        raise DatasetError(f"目录中没有 PNG 图像: {vis}")
    for name in names:
        ir_path = os.path.join(ir, name)
        if not os.path.exists(ir_path):
            raise DatasetError(f"可见光图像 {name} 缺少对应的红外图像")
        yield os.path.splitext(name)[0], ir_path, os.path.join(vis, name)


def _batch_path(out_dir: str, kind: str, name: str, default: str) -> str:
    if not name:
        return os.path.join(out_dir, default)
    return os.path.join(out_dir, kind, f"{name}.png")


def _run_model(args, write_fused: bool) -> int:
    model = load_model(args.checkpoint)
    count = 0
    for name, ir_path, vis_path in _iter_inputs(args.ir, args.vis):
        if not name:
            run_pipeline(ir_path, vis_path, args.checkpoint, args.out, model=model, write_fused=write_fused)
        else:
            vis = read_rgb(vis_path)
            output = infer(model, read_ir(ir_path), vis)
            if write_fused:
                write_png(_batch_path(args.out, "fused", name, ""), output.fused)
            write_png(_batch_path(args.out, "dehazed", name, ""), output.dehazed)
            if output.density is not None:
                density = density_at(output.density, *vis.shape[1:])
                write_png(_batch_path(args.out, "haze", name, ""), density)
                write_tensor(os.path.join(args.out, "haze", f"{name}.irvf"), density)
        count += 1
    print(f"已处理 {count} 对图像，输出目录: {args.out}")
    return 0


def cmd_synthesize(args) -> int:
    """合成数据集，或给单幅清晰图像加雾"""
    rng = make_rng(0 if args.seed is None else args.seed)
    ensure_dir(args.out)
    if args.clear:
        if not args.depth:
            raise DatasetError("--clear 需要同时给出 --depth")
        clear = read_rgb(args.clear)
        depth = np.asarray(read_tensor(args.depth), dtype=np.float64)
        params = haze_model.sample_haze_params(depth, rng)
        if args.beta is not None or args.airlight is not None:
            params = HazeParams(
                atmospheric_light=np.full(3, args.airlight) if args.airlight is not None else params.atmospheric_light,
                beta=args.beta if args.beta is not None else params.beta,
                depth=depth,
            )
        hazy = haze_model.synthesize_haze(clear, params).data
        write_png(os.path.join(args.out, "hazy.png"), np.clip(hazy, 0.0, 1.0))
        write_tensor(os.path.join(args.out, "transmission.irvf"), params.transmission())
        logging.info(f"单幅加雾: β={params.beta:.4f}, A={params.atmospheric_light}")
        print(f"已写出 hazy.png 与 transmission.irvf 到 {args.out}")
        return 0

    scenes = synthesize_suite(rng, args.scenes, args.size)
    write_dataset(args.out, scenes)
    print(f"已合成 {len(scenes)} 个 {args.size}×{args.size} 场景到 {args.out}")
    return 0


def cmd_train(args) -> int:
    config = load_config(args.config, seed=args.seed)
    if args.steps is not None:
        config = dataclasses.replace(config, max_steps=args.steps)
    result = train_from_directory(args.data, config, args.out, resume_path=args.resume)
    first, last = result.history[0]["l_total"], result.history[-1]["l_total"]
    print(f"训练完成: {result.steps} 步, l_total {first:.5f} → {last:.5f}，检查点写入 {args.out}")
    return 0


def cmd_dehaze(args) -> int:
    return _run_model(args, write_fused=False)


def cmd_fuse(args) -> int:
    return _run_model(args, write_fused=True)


def cmd_baseline(args) -> int:
    """暗通道去雾 + 平均融合"""
    count = 0
    for name, ir_path, vis_path in _iter_inputs(args.ir, args.vis):
        ir, vis = read_ir(ir_path), read_rgb(vis_path)
        if ir.shape[1:] != vis.shape[1:]:
            raise RegistrationError(f"红外 {ir.shape[1:]} 与可见光 {vis.shape[1:]} 尺寸不一致")
        fused, dehazed = two_stage_baseline(ir, vis, window=args.window)
        write_png(_batch_path(args.out, "fused", name, "fused.png"), fused.data)
        write_png(_batch_path(args.out, "dehazed", name, "dehazed.png"), dehazed.data)
        count += 1
    print(f"基线处理 {count} 对图像，输出目录: {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    report = evaluate_directory(args.data)
    paths = write_report(args.out or args.data, report)
    for key, value in report.mean.items():
        print(f"{key:>8}: {value:.4f}")
    print(f"报告: {paths['csv']}, {paths['json']}, {paths['xlsx']}")
    return 0


def _print_results(results) -> bool:
    width = max(len(r.name) for r in results)
    for r in results:
        status = "通过" if r.passed else "失败"
        detail = f"  {r.detail}" if r.detail else ""
        print(f"{r.name:<{width}}  {r.value:.3e}  {status}{detail}")
    return all(r.passed for r in results)


def cmd_gradcheck(args) -> int:
    start = args.seed or 0
    results = run_gradcheck_suite(seeds=range(start, start + args.seeds))
    return 0 if _print_results(results) else 1


def cmd_selftest(args) -> int:
    start = args.seed or 0
    results = run_selftest(gradcheck_seeds=range(start, start + args.seeds))
    passed = _print_results(results)
    print("自检通过" if passed else "自检失败")
    return 0 if passed else 1
