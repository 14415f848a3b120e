import pytest
import torch
import pyura

def test_cpu_by_default():
    assert not pyura.get_use_gpu()
    assert pyura.get_device().type == 'cpu'
    x = torch.zeros(3)
    assert pyura.to_device(x) is x

def test_set_device():
    pyura.set_device('cpu')
    assert pyura.get_device() == torch.device('cpu')
    assert not pyura.get_use_gpu()

@pytest.mark.skipif(torch.cuda.is_available(), reason = 'needs a machine without CUDA')
def test_gpu_request_without_cuda():
    with pytest.raises(RuntimeError):
        pyura.set_use_gpu(True)
    assert not pyura.get_use_gpu()

def test_draws_come_from_the_cpu_generator():
    rng = pyura.Rng(0)
    assert rng.generator.device == pyura.generator_device
    a = pyura.sample_complex_gaussian(2, 3, 1.0, pyura.Rng(4))
    b = pyura.sample_complex_gaussian(2, 3, 1.0, pyura.Rng(4))
    assert a.device == pyura.get_device()
    assert torch.equal(a, b)

@pytest.mark.skipif(not torch.cuda.is_available(), reason = 'needs CUDA')
def test_draws_do_not_depend_on_device():
    cpu = pyura.sample_complex_gaussian(4, 4, 1.0, pyura.Rng(5))
    pyura.set_use_gpu(True)
    gpu = pyura.sample_complex_gaussian(4, 4, 1.0, pyura.Rng(5))
    assert gpu.device.type == 'cuda'
    assert torch.equal(cpu, gpu.cpu())
