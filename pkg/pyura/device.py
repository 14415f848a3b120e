import torch

# Random streams are always drawn on the CPU so that a seed gives the same
# channels and noise whatever device the receiver runs on.
generator_device = torch.device('cpu')

use_gpu = False
device = torch.device('cpu')

def set_use_gpu(v: bool):
    """
        Run the signal-level linear algebra (received matrices, channel
        estimates, SIC) on CUDA or on the CPU. Bit-level work (CRC, polar
        decoding) and random draws stay on the CPU either way.
    """
    global use_gpu
    global device
    if v and not torch.cuda.is_available():
        raise RuntimeError('set_use_gpu(True) needs a CUDA device')
    use_gpu = v
    device = torch.device('cuda') if use_gpu else torch.device('cpu')

def get_use_gpu():
    global use_gpu
    return use_gpu

def set_device(d: torch.device):
    """
        Set the torch device that received matrices and channel estimates live on.
    """
    global device
    global use_gpu
    device = torch.device(d)
    use_gpu = device.type == 'cuda'

def get_device():
    global device
    return device

def to_device(x: torch.Tensor):
    """
        Move a tensor drawn or built on the CPU to the working device.
        A no-op when they already agree.
    """
    if x.device == device:
        return x
    return x.to(device)

__all__ = ['generator_device', 'set_use_gpu', 'get_use_gpu', 'set_device', 'get_device', 'to_device']
