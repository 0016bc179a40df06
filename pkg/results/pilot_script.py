import sys, time, json, numpy as np, dataclasses, logging
from seg25d.phantom import PhantomParams, generate_phantom, case_seed
from seg25d.volume import window_normalize
from seg25d.nnet.train import TrainConfig, train_volumes, predict_volume
logging.basicConfig(level=logging.INFO, format='%(asctime)s %(message)s')
epochs=int(sys.argv[1]); orients=sys.argv[2].split(','); lr=float(sys.argv[3]) if len(sys.argv)>3 else 1e-4
base=PhantomParams(num_muscle_classes=5, noise_sigma_hu=15, rotation_max_deg=20, seed=1000)
cases=[generate_phantom(dataclasses.replace(base, seed=case_seed(base.seed,i))) for i in range(20)]
cases=[(window_normalize(i,100,250),l) for i,l in cases]
tr,te=cases[:16],cases[16:]
def dsc(p,g,c):
    a=(p==c);b=(g==c); s=a.sum()+b.sum(); return 1.0 if s==0 else 2*(a&b).sum()/s
for o in orients:
    t=time.time()
    params,hist=train_volumes(tr,6,TrainConfig(epochs=epochs,orientation=o,seed=0,lr=lr))
    res=[]
    for img,lab in te:
        pr=predict_volume(params,img,o).argmax()
        res.append([dsc(pr.data,lab.data,c) for c in range(1,6)])
    res=np.array(res)
    print(o,'time',time.time()-t,'loss',[round(h.mean_loss,3) for h in hist],'dsc per class',res.mean(0).round(3),'mean',res.mean().round(4),flush=True)
